#pragma once

#include <string>
#include <string_view>

namespace ottv::detail {

/// Writes `bytes` to a sibling temporary file and renames it over `path`.
/// Throws IoError; no partial file is left behind on failure.
void write_file_atomic(const std::string& path, std::string_view bytes);

}  // namespace ottv::detail
