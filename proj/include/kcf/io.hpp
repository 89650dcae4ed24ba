#pragma once

#include <array>
#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>

#include "kcf/common.hpp"
#include "kcf/grid.hpp"
#include "kcf/targets.hpp"
#include "kcf/waveform.hpp"

namespace kcf {

class io_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace io_detail {

// All binary files are little-endian regardless of host.
inline void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_i64(std::string& out, std::int64_t v) {
    put_u64(out, static_cast<std::uint64_t>(v));
}

inline void put_f64(std::string& out, double v) {
    put_u64(out, std::bit_cast<std::uint64_t>(v));
}

class Reader {
public:
    explicit Reader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
        if (!in_) throw io_error("cannot open " + path);
    }

    void expect_magic(const char* magic) {
        std::array<char, 16> buf{};
        read_raw(buf.data(), buf.size());
        std::array<char, 16> want{};
        std::strncpy(want.data(), magic, want.size());
        if (buf != want) throw io_error(path_ + ": bad magic, not a " + magic + " file");
    }

    std::uint32_t u32() {
        std::array<unsigned char, 4> b{};
        read_raw(reinterpret_cast<char*>(b.data()), b.size());
        std::uint32_t v = 0;
        for (int i = 3; i >= 0; --i) v = (v << 8) | b[static_cast<std::size_t>(i)];
        return v;
    }

    std::uint64_t u64() {
        std::array<unsigned char, 8> b{};
        read_raw(reinterpret_cast<char*>(b.data()), b.size());
        std::uint64_t v = 0;
        for (int i = 7; i >= 0; --i) v = (v << 8) | b[static_cast<std::size_t>(i)];
        return v;
    }

    std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
    double f64() { return std::bit_cast<double>(u64()); }

    cvec complexes(std::uint64_t n) {
        cvec v(n);
        for (auto& z : v) {
            const double re = f64();
            const double im = f64();
            z = {re, im};
        }
        return v;
    }

    rvec reals(std::uint64_t n) {
        rvec v(n);
        for (auto& x : v) x = f64();
        return v;
    }

private:
    void read_raw(char* dst, std::size_t n) {
        in_.read(dst, static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n)
            throw io_error(path_ + ": truncated file");
    }

    std::string path_;
    std::ifstream in_;
};

inline void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot open " + path + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw io_error("write failed: " + path);
}

inline void put_magic(std::string& out, const char* magic) {
    std::array<char, 16> buf{};
    std::strncpy(buf.data(), magic, buf.size());
    out.append(buf.data(), buf.size());
}

} // namespace io_detail

inline constexpr const char* signal_magic = "KCF-SIGNAL-V1";
inline constexpr const char* train_magic = "KCF-TRAIN-V1";
inline constexpr const char* map_magic = "KCF-MAP-V1";

/// Complex baseband samples plus the dimensions needed to interpret them.
struct SignalFile {
    cvec samples; // M*L, pulse blocks concatenated
    std::uint64_t n_pulses = 0;
    std::uint64_t block_len = 0;
    std::uint64_t pulse_len = 0;
    std::uint64_t n_velocities = 0;
    std::uint64_t n_delays = 0;
    double sample_rate = 0.0;
    double carrier_freq = 0.0;
};

inline void write_signal(const std::string& path, const SignalFile& sig) {
    if (sig.samples.size() != sig.n_pulses * sig.block_len)
        throw io_error("write_signal: sample count does not match M*L");
    std::string out;
    out.reserve(16 + 4 + 5 * 8 + 2 * 8 + sig.samples.size() * 16);
    io_detail::put_magic(out, signal_magic);
    io_detail::put_u32(out, 1);
    io_detail::put_u64(out, sig.n_pulses);
    io_detail::put_u64(out, sig.block_len);
    io_detail::put_u64(out, sig.pulse_len);
    io_detail::put_u64(out, sig.n_velocities);
    io_detail::put_u64(out, sig.n_delays);
    io_detail::put_f64(out, sig.sample_rate);
    io_detail::put_f64(out, sig.carrier_freq);
    for (const auto& z : sig.samples) {
        io_detail::put_f64(out, z.real());
        io_detail::put_f64(out, z.imag());
    }
    io_detail::write_file(path, out);
}

inline SignalFile read_signal(const std::string& path) {
    io_detail::Reader r(path);
    r.expect_magic(signal_magic);
    const auto version = r.u32();
    if (version != 1) throw io_error(path + ": unsupported signal version");
    SignalFile sig;
    sig.n_pulses = r.u64();
    sig.block_len = r.u64();
    sig.pulse_len = r.u64();
    sig.n_velocities = r.u64();
    sig.n_delays = r.u64();
    sig.sample_rate = r.f64();
    sig.carrier_freq = r.f64();
    sig.samples = r.complexes(sig.n_pulses * sig.block_len);
    return sig;
}

inline void write_train(const std::string& path, const PulseTrain& train) {
    std::string out;
    io_detail::put_magic(out, train_magic);
    io_detail::put_u32(out, 1);
    io_detail::put_u64(out, static_cast<std::uint64_t>(train.n_pulses()));
    io_detail::put_u64(out, static_cast<std::uint64_t>(train.block_len));
    io_detail::put_f64(out, train.sample_rate);
    io_detail::put_f64(out, train.carrier_freq);
    for (const auto& p : train.pulses) {
        io_detail::put_i64(out, p.start_sample);
        io_detail::put_u64(out, p.samples.size());
        for (const auto& z : p.samples) {
            io_detail::put_f64(out, z.real());
            io_detail::put_f64(out, z.imag());
        }
    }
    io_detail::write_file(path, out);
}

inline PulseTrain read_train(const std::string& path) {
    io_detail::Reader r(path);
    r.expect_magic(train_magic);
    if (r.u32() != 1) throw io_error(path + ": unsupported train version");
    const auto m = r.u64();
    PulseTrain train;
    train.block_len = static_cast<int>(r.u64());
    train.sample_rate = r.f64();
    train.carrier_freq = r.f64();
    train.pulses.reserve(m);
    for (std::uint64_t i = 0; i < m; ++i) {
        Pulse p;
        p.start_sample = r.i64();
        const auto n = r.u64();
        p.samples = r.complexes(n);
        train.pulses.push_back(std::move(p));
    }
    if (m == 0) throw io_error(path + ": empty pulse train");
    return train;
}

inline void write_map(const std::string& path, const RangeDopplerMap& map,
                      const RangeDopplerGrid& grid) {
    if (grid.n_delays() != map.n_delays || grid.n_velocities() != map.n_velocities)
        throw io_error("write_map: grid does not match the map");
    std::string out;
    io_detail::put_magic(out, map_magic);
    io_detail::put_u32(out, 1);
    io_detail::put_u64(out, static_cast<std::uint64_t>(map.n_delays));
    io_detail::put_u64(out, static_cast<std::uint64_t>(map.n_velocities));
    for (int j = 0; j < map.n_delays; ++j) io_detail::put_f64(out, grid.delay(j));
    for (int k = 0; k < map.n_velocities; ++k) io_detail::put_f64(out, grid.velocity(k));
    for (const double v : map.power) io_detail::put_f64(out, v);
    io_detail::write_file(path, out);
}

struct MapFile {
    RangeDopplerMap map;
    rvec delays;
    rvec velocities;
};

inline MapFile read_map(const std::string& path) {
    io_detail::Reader r(path);
    r.expect_magic(map_magic);
    if (r.u32() != 1) throw io_error(path + ": unsupported map version");
    MapFile f;
    f.map.n_delays = static_cast<int>(r.u64());
    f.map.n_velocities = static_cast<int>(r.u64());
    f.delays = r.reals(static_cast<std::uint64_t>(f.map.n_delays));
    f.velocities = r.reals(static_cast<std::uint64_t>(f.map.n_velocities));
    f.map.power = r.reals(static_cast<std::uint64_t>(f.map.n_delays) *
                          static_cast<std::uint64_t>(f.map.n_velocities));
    return f;
}

/// Shortest-round-trip decimal formatting for CSV cells; %.17g guarantees the
/// exact double is recovered on parse, which the determinism contract needs.
inline std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw io_error("cannot open " + path + " for writing");
    out << content;
    if (!out) throw io_error("write failed: " + path);
}

/// FNV-1a over the start-sample sequence; identifies one PRI realization in
/// result tables.
inline std::uint64_t pri_hash(const PulseTrain& train) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& p : train.pulses) {
        auto v = static_cast<std::uint64_t>(p.start_sample);
        for (int i = 0; i < 8; ++i) {
            h ^= (v >> (8 * i)) & 0xff;
            h *= 0x100000001b3ull;
        }
    }
    return h;
}

} // namespace kcf
