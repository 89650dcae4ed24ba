#pragma once

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "kcf/common.hpp"

namespace kcf {

/// Configuration problem: unknown key, missing section, unparseable value.
/// The CLI maps this to exit code 2.
class config_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// INI-style document: [section] headers, key = value lines, full-line
/// comments starting with '#' or ';'. Order is preserved so that
/// parse(serialize(parse(text))) == parse(text).
class Config {
public:
    struct Entry {
        std::string key;
        std::string value;
    };
    struct Section {
        std::string name;
        std::vector<Entry> entries;
    };

    static Config parse(const std::string& text) {
        Config cfg;
        std::istringstream in(text);
        std::string line;
        int lineno = 0;
        Section* current = nullptr;
        while (std::getline(in, line)) {
            ++lineno;
            const std::string t = trim(line);
            if (t.empty() || t[0] == '#' || t[0] == ';') continue;
            if (t.front() == '[') {
                if (t.back() != ']')
                    throw config_error("config line " + std::to_string(lineno) +
                                       ": unterminated section header");
                const std::string name = trim(t.substr(1, t.size() - 2));
                if (name.empty())
                    throw config_error("config line " + std::to_string(lineno) +
                                       ": empty section name");
                if (cfg.find(name))
                    throw config_error("config: duplicate section: " + name);
                cfg.sections_.push_back({name, {}});
                current = &cfg.sections_.back();
                continue;
            }
            const auto eq = t.find('=');
            if (eq == std::string::npos)
                throw config_error("config line " + std::to_string(lineno) +
                                   ": expected key = value");
            if (!current)
                throw config_error("config line " + std::to_string(lineno) +
                                   ": key outside any section");
            const std::string key = trim(t.substr(0, eq));
            const std::string value = trim(t.substr(eq + 1));
            if (key.empty())
                throw config_error("config line " + std::to_string(lineno) + ": empty key");
            if (cfg.lookup(current->name, key))
                throw config_error("config: duplicate key: " + current->name + "." + key);
            current->entries.push_back({key, value});
        }
        return cfg;
    }

    static Config load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw config_error("cannot open config file: " + path);
        std::ostringstream buf;
        buf << in.rdbuf();
        return parse(buf.str());
    }

    std::string serialize() const {
        std::string out;
        for (const auto& s : sections_) {
            out += "[" + s.name + "]\n";
            for (const auto& e : s.entries) out += e.key + " = " + e.value + "\n";
            out += "\n";
        }
        return out;
    }

    const std::vector<Section>& sections() const { return sections_; }

    bool has_section(const std::string& section) const { return find(section) != nullptr; }

    bool has(const std::string& section, const std::string& key) const {
        return lookup(section, key) != nullptr;
    }

    const std::string& get(const std::string& section, const std::string& key) const {
        const Section* s = find(section);
        if (!s) throw config_error("missing section: " + section);
        if (const std::string* v = lookup(section, key)) return *v;
        throw config_error("missing key: " + section + "." + key);
    }

    void set(const std::string& section, const std::string& key, const std::string& value) {
        Section* s = const_cast<Section*>(find(section));
        if (!s) {
            sections_.push_back({section, {}});
            s = &sections_.back();
        }
        for (auto& e : s->entries)
            if (e.key == key) {
                e.value = value;
                return;
            }
        s->entries.push_back({key, value});
    }

    /// Set only if absent; used to make every default explicit in manifests.
    void set_default(const std::string& section, const std::string& key,
                     const std::string& value) {
        if (!has(section, key)) set(section, key, value);
    }

    double get_double(const std::string& section, const std::string& key) const {
        const std::string& v = get(section, key);
        try {
            std::size_t pos = 0;
            const double d = std::stod(v, &pos);
            if (pos != v.size()) throw std::invalid_argument(v);
            return d;
        } catch (const std::exception&) {
            throw config_error("bad number for " + section + "." + key + ": '" + v + "'");
        }
    }

    std::int64_t get_int(const std::string& section, const std::string& key) const {
        const std::string& v = get(section, key);
        try {
            std::size_t pos = 0;
            const long long i = std::stoll(v, &pos);
            if (pos != v.size()) throw std::invalid_argument(v);
            return i;
        } catch (const std::exception&) {
            throw config_error("bad integer for " + section + "." + key + ": '" + v + "'");
        }
    }

    std::uint64_t get_seed(const std::string& section, const std::string& key) const {
        const std::string& v = get(section, key);
        try {
            std::size_t pos = 0;
            const unsigned long long i = std::stoull(v, &pos);
            if (pos != v.size()) throw std::invalid_argument(v);
            return i;
        } catch (const std::exception&) {
            throw config_error("bad seed for " + section + "." + key + ": '" + v + "'");
        }
    }

    bool get_bool(const std::string& section, const std::string& key) const {
        const std::string& v = get(section, key);
        if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
        if (v == "false" || v == "0" || v == "no" || v == "off") return false;
        throw config_error("bad boolean for " + section + "." + key + ": '" + v + "'");
    }

    /// Comma-separated list of numbers.
    rvec get_list(const std::string& section, const std::string& key) const {
        const std::string& raw = get(section, key);
        rvec out;
        std::string item;
        std::istringstream in(raw);
        while (std::getline(in, item, ',')) {
            const std::string t = trim(item);
            if (t.empty())
                throw config_error("empty list element in " + section + "." + key);
            try {
                std::size_t pos = 0;
                out.push_back(std::stod(t, &pos));
                if (pos != t.size()) throw std::invalid_argument(t);
            } catch (const std::exception&) {
                throw config_error("bad list element for " + section + "." + key + ": '" + t +
                                   "'");
            }
        }
        if (out.empty()) throw config_error("empty list for " + section + "." + key);
        return out;
    }

    /// Environment overrides: PREFIX_SECTION_KEY (upper case) replaces the
    /// value of an existing key. Unknown environment keys are left alone, so
    /// stray variables cannot inject config entries.
    void apply_env_overrides(const std::string& prefix = "KCF") {
        for (auto& s : sections_)
            for (auto& e : s.entries) {
                std::string name = prefix + "_" + upper(s.name) + "_" + upper(e.key);
                if (const char* v = std::getenv(name.c_str())) e.value = v;
            }
    }

    bool operator==(const Config& other) const {
        if (sections_.size() != other.sections_.size()) return false;
        for (std::size_t i = 0; i < sections_.size(); ++i) {
            if (sections_[i].name != other.sections_[i].name) return false;
            if (sections_[i].entries.size() != other.sections_[i].entries.size()) return false;
            for (std::size_t j = 0; j < sections_[i].entries.size(); ++j) {
                if (sections_[i].entries[j].key != other.sections_[i].entries[j].key) return false;
                if (sections_[i].entries[j].value != other.sections_[i].entries[j].value)
                    return false;
            }
        }
        return true;
    }

private:
    static std::string trim(const std::string& s) {
        std::size_t a = 0;
        std::size_t b = s.size();
        while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
        while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
        return s.substr(a, b - a);
    }

    static std::string upper(const std::string& s) {
        std::string out = s;
        for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        return out;
    }

    const Section* find(const std::string& name) const {
        for (const auto& s : sections_)
            if (s.name == name) return &s;
        return nullptr;
    }

    const std::string* lookup(const std::string& section, const std::string& key) const {
        const Section* s = find(section);
        if (!s) return nullptr;
        for (const auto& e : s->entries)
            if (e.key == key) return &e.value;
        return nullptr;
    }

    std::vector<Section> sections_;
};

} // namespace kcf
