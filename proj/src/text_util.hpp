/* Copyright 2026 The HierTag Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef HIERTAG_SRC_TEXT_UTIL_HPP_
#define HIERTAG_SRC_TEXT_UTIL_HPP_

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace hiertag::internal {

std::vector<std::string> split_whitespace(std::string_view line);
std::vector<std::string_view> split_lines(std::string_view text);
std::string_view trim(std::string_view s);
bool starts_with(std::string_view s, std::string_view prefix);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace hiertag::internal

#endif  // HIERTAG_SRC_TEXT_UTIL_HPP_
