#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace coref {

std::uint64_t fnv1a64(std::string_view bytes);

// 16 lowercase hex digits.
std::string hex64(std::uint64_t value);

// SHA-1 of "blob <size>\0<content>", as git computes object ids.
std::string git_blob_sha1(std::string_view content);
std::string git_blob_sha1_file(const std::filesystem::path& path);

}  // namespace coref
