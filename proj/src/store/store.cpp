#include "aescope/store/store.hpp"

#include "aescope/core/error.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>

namespace aescope::store {

namespace fs = std::filesystem;

namespace {

static_assert(std::endian::native == std::endian::little, "container I/O assumes a little-endian host");

template <typename T>
void append_le(std::vector<std::uint8_t>& out, T v) {
    std::uint8_t buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out.insert(out.end(), buf, buf + sizeof(T));
}

template <typename T>
T read_le(const std::uint8_t* p) {
    T v;
    std::memcpy(&v, p, sizeof(T));
    return v;
}

std::vector<std::uint8_t> read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error(ErrorCode::not_found, "cannot open " + p.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const fs::path& p, std::span<const std::uint8_t> bytes) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw Error(ErrorCode::storage_failure, "cannot write " + p.string());
}

[[noreturn]] void corrupt(const std::string& name, const std::string& why) {
    throw Error(ErrorCode::corrupt_channel, "channel '" + name + "': " + why, json{{"channel", name}});
}

bool valid_channel_name(const std::string& n) {
    return !n.empty() && n != "manifest" && std::all_of(n.begin(), n.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
    });
}

std::string format_id(std::uint64_t n, const char* prefix) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s-%06llu", prefix, static_cast<unsigned long long>(n));
    return buf;
}

}  // namespace

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
    return static_cast<std::uint32_t>(crc32(0L, bytes.data(), static_cast<uInt>(bytes.size())));
}

std::vector<std::uint8_t> encode_channel(const Channel& ch) {
    if (ch.element_count() != ch.data.size() || ch.shape.empty() || ch.shape.size() > 255) {
        throw Error(ErrorCode::shape_mismatch, "channel shape does not match its data");
    }
    std::vector<std::uint8_t> out(kMagic, kMagic + 4);
    out.push_back(kFormatVersion);
    out.push_back(static_cast<std::uint8_t>(ch.dtype));
    out.push_back(static_cast<std::uint8_t>(ch.shape.size()));
    out.resize(kHeaderSize, 0);
    for (auto d : ch.shape) append_le<std::uint64_t>(out, d);
    out.reserve(out.size() + ch.data.size() * dtype_size(ch.dtype));
    for (double v : ch.data) {
        switch (ch.dtype) {
        case DType::f64: append_le<double>(out, v); break;
        case DType::f32: append_le<float>(out, static_cast<float>(v)); break;
        case DType::i32: append_le<std::int32_t>(out, static_cast<std::int32_t>(std::lround(v))); break;
        case DType::u8: append_le<std::uint8_t>(out, static_cast<std::uint8_t>(std::lround(v))); break;
        }
    }
    return out;
}

Channel decode_channel(std::span<const std::uint8_t> bytes, const std::string& name) {
    if (bytes.size() < kHeaderSize) corrupt(name, "file shorter than header");
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) corrupt(name, "bad magic");
    if (bytes[4] != kFormatVersion) corrupt(name, "unsupported version " + std::to_string(bytes[4]));
    const std::uint8_t code = bytes[5];
    if (code < 1 || code > 4) corrupt(name, "unknown dtype code " + std::to_string(code));
    Channel ch;
    ch.dtype = static_cast<DType>(code);
    const std::size_t ndim = bytes[6];
    if (ndim == 0) corrupt(name, "zero dimensions");
    std::size_t pos = kHeaderSize;
    if (bytes.size() < pos + 8 * ndim) corrupt(name, "truncated dims");
    std::size_t count = 1;
    for (std::size_t i = 0; i < ndim; ++i, pos += 8) {
        const auto d = read_le<std::uint64_t>(bytes.data() + pos);
        if (d != 0 && count > (std::size_t{1} << 40) / d) corrupt(name, "dims too large");
        ch.shape.push_back(static_cast<std::size_t>(d));
        count *= static_cast<std::size_t>(d);
    }
    const std::size_t esize = dtype_size(ch.dtype);
    if (bytes.size() - pos != count * esize) corrupt(name, "payload length does not match dims");
    ch.data.resize(count);
    for (std::size_t i = 0; i < count; ++i, pos += esize) {
        const std::uint8_t* p = bytes.data() + pos;
        switch (ch.dtype) {
        case DType::f64: ch.data[i] = read_le<double>(p); break;
        case DType::f32: ch.data[i] = read_le<float>(p); break;
        case DType::i32: ch.data[i] = read_le<std::int32_t>(p); break;
        case DType::u8: ch.data[i] = *p; break;
        }
    }
    return ch;
}

void write_container(const Dataset& ds, const fs::path& dir) {
    validate(ds);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::storage_failure, "cannot create " + dir.string() + ": " + ec.message());
    json manifest;
    manifest["name"] = ds.name;
    manifest["metadata"] = ds.metadata;
    manifest["channels"] = json::object();
    for (const auto& [name, ch] : ds.channels) {
        if (!valid_channel_name(name)) {
            throw Error(ErrorCode::storage_failure, "channel name '" + name + "' is not a safe file name");
        }
        const auto bytes = encode_channel(ch);
        const std::string file = name + ".bin";
        write_bytes(dir / file, bytes);
        manifest["channels"][name] = json{{"file", file},
                                          {"dtype", to_string(ch.dtype)},
                                          {"shape", ch.shape},
                                          {"units", ch.units},
                                          {"crc32", crc32_of(bytes)}};
    }
    const std::string text = manifest.dump(2) + "\n";
    write_bytes(dir / "manifest.json", std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

Dataset read_container(const fs::path& dir) {
    const fs::path mpath = dir / "manifest.json";
    if (!fs::is_regular_file(mpath)) throw Error(ErrorCode::not_found, "no dataset at " + dir.string());
    const auto raw = read_bytes(mpath);
    json manifest;
    try {
        manifest = json::parse(raw.begin(), raw.end());
    } catch (const json::exception& e) {
        throw Error(ErrorCode::corrupt_channel, std::string("manifest.json is not valid JSON: ") + e.what(),
                    json{{"channel", "manifest"}});
    }
    Dataset ds;
    try {
        ds.name = manifest.at("name").get<std::string>();
        ds.metadata = manifest.at("metadata");
        for (const auto& [name, desc] : manifest.at("channels").items()) {
            if (!valid_channel_name(name)) corrupt(name, "unsafe channel name");
            const auto file = desc.at("file").get<std::string>();
            if (file != name + ".bin") corrupt(name, "unexpected file name '" + file + "'");
            std::vector<std::uint8_t> bytes;
            try {
                bytes = read_bytes(dir / file);
            } catch (const Error&) {
                corrupt(name, "file missing");
            }
            if (crc32_of(bytes) != desc.at("crc32").get<std::uint32_t>()) corrupt(name, "CRC32 mismatch");
            Channel ch = decode_channel(bytes, name);
            if (ch.shape != desc.at("shape").get<std::vector<std::size_t>>()) corrupt(name, "shape differs from manifest");
            if (ch.dtype != dtype_from_string(desc.at("dtype").get<std::string>())) corrupt(name, "dtype differs from manifest");
            ch.units = desc.at("units").get<std::string>();
            ds.channels.emplace(name, std::move(ch));
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::corrupt_channel, std::string("malformed manifest: ") + e.what(),
                    json{{"channel", "manifest"}});
    }
    try {
        validate(ds);
    } catch (const Error& e) {
        throw Error(ErrorCode::corrupt_channel, e.what(), e.data());
    }
    ds.id = dir.filename().string();
    return ds;
}

std::string MemoryRepository::put(const Dataset& ds) {
    validate(ds);
    std::lock_guard lock(mu_);
    Dataset copy = ds;
    copy.id = format_id(items_.size() + 1, "mem");
    items_.push_back(std::move(copy));
    return items_.back().id;
}

Dataset MemoryRepository::get(const std::string& id) const {
    std::lock_guard lock(mu_);
    for (const auto& d : items_) {
        if (d.id == id) return d;
    }
    throw Error(ErrorCode::not_found, "no dataset with id '" + id + "'", json{{"id", id}});
}

std::vector<std::string> MemoryRepository::ids() const {
    std::lock_guard lock(mu_);
    std::vector<std::string> out;
    for (const auto& d : items_) out.push_back(d.id);
    return out;
}

DirectoryStore::DirectoryStore(fs::path root) : root_(std::move(root)) {
    std::error_code ec;
    fs::create_directories(root_, ec);
    if (ec) throw Error(ErrorCode::storage_failure, "cannot create store root " + root_.string());
    for (const auto& e : fs::directory_iterator(root_)) {
        const auto n = e.path().filename().string();
        unsigned long long k = 0;
        if (std::sscanf(n.c_str(), "ds-%llu", &k) == 1) next_ = std::max<std::uint64_t>(next_, k + 1);
    }
}

std::string DirectoryStore::put(const Dataset& ds) {
    std::lock_guard lock(mu_);
    const std::string id = format_id(next_, "ds");
    write_container(ds, root_ / id);
    ++next_;
    return id;
}

Dataset DirectoryStore::get(const std::string& id) const {
    const bool safe = !id.empty() && id.find('/') == std::string::npos && id.find('\\') == std::string::npos &&
                      id != "." && id != "..";
    if (!safe) throw Error(ErrorCode::not_found, "no dataset with id '" + id + "'", json{{"id", id}});
    try {
        return read_container(root_ / id);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::not_found) {
            throw Error(ErrorCode::not_found, "no dataset with id '" + id + "'", json{{"id", id}});
        }
        throw;
    }
}

std::vector<std::string> DirectoryStore::ids() const {
    std::lock_guard lock(mu_);
    std::vector<std::string> out;
    for (const auto& e : fs::directory_iterator(root_)) {
        if (fs::is_regular_file(e.path() / "manifest.json")) out.push_back(e.path().filename().string());
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace aescope::store
