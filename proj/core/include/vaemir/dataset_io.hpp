#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "vaemir/mir.hpp"

// JSON Lines bag files, one bag per line:
//   {"bag_id": str, "year": int, "yield": number|null,
//    "instances": [[number x D] x N], "anomaly_flags": [bool x N]}
// "anomaly_flags" is optional.
namespace vaemir::io {

// Shortest decimal that round-trips to the same double; always '.' as the
// decimal separator regardless of locale.
std::string format_number(double value);

std::string bag_to_json_line(const mir::Bag& bag);
mir::Bag bag_from_json_line(const std::string& line);

void write_dataset(std::ostream& os, std::span<const mir::Bag> bags);

// Reads every non-blank line. Errors name the 1-based line number; all bags
// must share one feature dimension.
std::vector<mir::Bag> read_dataset(std::istream& is);
std::vector<mir::Bag> read_dataset_file(const std::filesystem::path& path);

// Streams the content into a temporary sibling file, then renames it over
// `path`; an exception leaves no file behind.
void write_file_atomic(const std::filesystem::path& path,
                       const std::function<void(std::ostream&)>& writer);

}  // namespace vaemir::io
