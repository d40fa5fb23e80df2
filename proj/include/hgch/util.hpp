#pragma once

#include <cstdint>
#include <stdexcept>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace hgch {

inline constexpr std::string_view kVersion = "hgch 0.1.0";

// usage, config, or schema problem; the CLI maps this to exit code 2
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Minimal INI reader: [section] headers, key = value lines, # or ; comments.
// Used for run configs and dataset manifests.
struct IniSection {
    std::string name;
    std::vector<std::pair<std::string, std::string>> entries;
    const std::string* get(std::string_view key) const;
};

struct Ini {
    std::vector<IniSection> sections;
    static Ini parse_text(std::string_view text, const std::string& origin);
    static Ini parse_file(const std::filesystem::path& p);
    const IniSection* find(std::string_view name) const;
};

// FNV-1a 64-bit, used for dataset fingerprints and checkpoint checksums.
class Fnv1a {
public:
    void update(const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            h_ ^= p[i];
            h_ *= 0x100000001b3ull;
        }
    }
    void update(std::string_view s) { update(s.data(), s.size()); }
    std::uint64_t digest() const { return h_; }
    std::string hex() const;

private:
    std::uint64_t h_ = 0xcbf29ce484222325ull;
};

std::string read_file(const std::filesystem::path& p);
void write_file(const std::filesystem::path& p, std::string_view content);

// fingerprint of a file list: mixes each name and its full content
std::string fingerprint_files(const std::vector<std::filesystem::path>& files);

std::string version_hash();

// splits [0, n) into chunks and runs them on `threads` workers (<=0: hardware
// concurrency); fn(begin, end) must be safe to run concurrently
void parallel_for(std::int64_t n, int threads,
                  const std::function<void(std::int64_t, std::int64_t)>& fn);

std::vector<std::string> split_on(std::string_view s, char sep);
std::string trim(std::string_view s);

}  // namespace hgch
