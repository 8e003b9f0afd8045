#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "vmspod/assembly.hpp"
#include "vmspod/errors.hpp"

namespace vmspod {

/// Velocity snapshots at uniform spacing, tied to the generating space.
struct SnapshotSet {
    std::uint64_t fingerprint = 0;
    double dt_snap = 0.0;
    std::vector<Vec> snapshots;

    int count() const { return static_cast<int>(snapshots.size()); }
    int n_u() const { return snapshots.empty() ? 0 : static_cast<int>(snapshots.front().size()); }
};

namespace io_detail {

template <typename T>
void write_pod(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T read_pod(std::istream& is, const char* what) {
    T v;
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!is) throw FormatError(std::string("truncated file while reading ") + what);
    return v;
}

}  // namespace io_detail

inline constexpr std::uint16_t kSnapshotFormatVersion = 1;

inline void write_snapshots(const SnapshotSet& set, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw FormatError("cannot open for writing: " + path);
    os.write("VPS1", 4);
    io_detail::write_pod(os, kSnapshotFormatVersion);
    io_detail::write_pod(os, set.fingerprint);
    io_detail::write_pod(os, static_cast<std::uint32_t>(set.count()));
    io_detail::write_pod(os, static_cast<std::uint32_t>(set.n_u()));
    io_detail::write_pod(os, set.dt_snap);
    for (const Vec& u : set.snapshots)
        os.write(reinterpret_cast<const char*>(u.data()),
                 static_cast<std::streamsize>(sizeof(double)) * u.size());
    if (!os) throw FormatError("write failed: " + path);
}

inline SnapshotSet read_snapshots(const std::string& path,
                                  std::optional<std::uint64_t> expected_fingerprint = {}) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError("cannot open: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "VPS1", 4) != 0)
        throw FormatError("bad magic in snapshot file: " + path);
    const auto version = io_detail::read_pod<std::uint16_t>(is, "version");
    if (version != kSnapshotFormatVersion)
        throw FormatError("unsupported snapshot format version " + std::to_string(version));
    SnapshotSet set;
    set.fingerprint = io_detail::read_pod<std::uint64_t>(is, "fingerprint");
    const auto m = io_detail::read_pod<std::uint32_t>(is, "snapshot count");
    const auto n = io_detail::read_pod<std::uint32_t>(is, "dof count");
    set.dt_snap = io_detail::read_pod<double>(is, "dt_snap");
    if (expected_fingerprint && set.fingerprint != *expected_fingerprint)
        throw CompatibilityError("snapshot fingerprint does not match the configured space");
    set.snapshots.resize(m);
    for (auto& u : set.snapshots) {
        u.resize(n);
        is.read(reinterpret_cast<char*>(u.data()),
                static_cast<std::streamsize>(sizeof(double)) * n);
        if (!is) throw FormatError("truncated snapshot payload: " + path);
    }
    return set;
}

}  // namespace vmspod
