#pragma once

#include "aescope/core/dataset.hpp"

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <span>
#include <string>
#include <vector>

namespace aescope::store {

inline constexpr char kMagic[4] = {'A', 'E', 'S', 'C'};
inline constexpr std::uint8_t kFormatVersion = 1;
inline constexpr std::size_t kHeaderSize = 16;

/// Encodes one channel file: 16-byte header (magic, version, dtype code, ndim,
/// 9 zero bytes), little-endian u64 dims, then the row-major little-endian payload.
std::vector<std::uint8_t> encode_channel(const Channel& ch);
/// Inverse of encode_channel. Throws Error(corrupt_channel) naming `name`.
Channel decode_channel(std::span<const std::uint8_t> bytes, const std::string& name);

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes);

/// Writes `dir/manifest.json` plus one `<channel>.bin` per channel. The directory
/// is created if needed. Throws Error(storage_failure).
void write_container(const Dataset& ds, const std::filesystem::path& dir);
/// Reads and fully validates a container (shapes, CRCs). Throws Error(not_found)
/// or Error(corrupt_channel).
Dataset read_container(const std::filesystem::path& dir);

/// Where acquisitions put their datasets. Implementations are thread-safe.
class DatasetRepository {
public:
    virtual ~DatasetRepository() = default;
    /// Stores a copy and returns a fresh id; identical data saved twice gets two ids.
    virtual std::string put(const Dataset& ds) = 0;
    /// Throws Error(not_found).
    virtual Dataset get(const std::string& id) const = 0;
    virtual std::vector<std::string> ids() const = 0;
};

class MemoryRepository final : public DatasetRepository {
public:
    std::string put(const Dataset& ds) override;
    Dataset get(const std::string& id) const override;
    std::vector<std::string> ids() const override;

private:
    mutable std::mutex mu_;
    std::vector<Dataset> items_;
};

/// Containers under a root directory, one `ds-NNNNNN` subdirectory each.
class DirectoryStore final : public DatasetRepository {
public:
    explicit DirectoryStore(std::filesystem::path root);

    std::string put(const Dataset& ds) override;
    Dataset get(const std::string& id) const override;
    std::vector<std::string> ids() const override;

    const std::filesystem::path& root() const { return root_; }
    std::filesystem::path path_of(const std::string& id) const { return root_ / id; }

private:
    std::filesystem::path root_;
    mutable std::mutex mu_;
    std::uint64_t next_ = 1;
};

}  // namespace aescope::store
