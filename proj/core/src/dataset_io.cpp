#include "vaemir/dataset_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <system_error>

#include "json.hpp"
#include "vaemir/error.hpp"

namespace vaemir::io {

using nlohmann::json;

std::string format_number(double value) {
  if (!std::isfinite(value)) throw DataError("cannot serialize a non-finite number");
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

std::string bag_to_json_line(const mir::Bag& bag) {
  bag.validate();
  json j;
  j["bag_id"] = bag.bag_id;
  j["year"] = bag.year;
  j["yield"] = bag.label ? json(*bag.label) : json(nullptr);
  json instances = json::array();
  for (Eigen::Index c = 0; c < bag.size(); ++c) {
    json row = json::array();
    for (Eigen::Index r = 0; r < bag.dim(); ++r) row.push_back(bag.instances(r, c));
    instances.push_back(std::move(row));
  }
  j["instances"] = std::move(instances);
  if (bag.anomaly_flags) {
    json flags = json::array();
    for (bool f : *bag.anomaly_flags) flags.push_back(f);
    j["anomaly_flags"] = std::move(flags);
  }
  return j.dump();
}

namespace {

const json& require(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) throw DataError(std::string("missing field '") + key + "'");
  return *it;
}

}  // namespace

mir::Bag bag_from_json_line(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw DataError("expected a JSON object");

  mir::Bag bag;
  const json& id = require(j, "bag_id");
  if (!id.is_string()) throw DataError("'bag_id' must be a string");
  bag.bag_id = id.get<std::string>();
  const json& year = require(j, "year");
  if (!year.is_number_integer()) throw DataError("'year' must be an integer");
  bag.year = year.get<int>();
  const json& yield = require(j, "yield");
  if (yield.is_number()) {
    bag.label = yield.get<double>();
  } else if (!yield.is_null()) {
    throw DataError("'yield' must be a number or null");
  }

  const json& instances = require(j, "instances");
  if (!instances.is_array() || instances.empty()) {
    throw DataError("'instances' must be a non-empty array");
  }
  const std::size_t n = instances.size();
  const json& first = instances.front();
  if (!first.is_array() || first.empty()) throw DataError("instances must be non-empty arrays");
  const std::size_t d = first.size();
  bag.instances.resize(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(n));
  for (std::size_t c = 0; c < n; ++c) {
    const json& row = instances[c];
    if (!row.is_array() || row.size() != d) {
      throw DataError("instance " + std::to_string(c) + " has " +
                      std::to_string(row.is_array() ? row.size() : 0) + " features, expected " +
                      std::to_string(d));
    }
    for (std::size_t r = 0; r < d; ++r) {
      if (!row[r].is_number()) throw DataError("instance features must be numbers");
      bag.instances(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[r].get<double>();
    }
  }

  const auto flags_it = j.find("anomaly_flags");
  if (flags_it != j.end() && !flags_it->is_null()) {
    if (!flags_it->is_array()) throw DataError("'anomaly_flags' must be an array");
    std::vector<bool> flags;
    for (const auto& f : *flags_it) {
      if (!f.is_boolean()) throw DataError("'anomaly_flags' entries must be booleans");
      flags.push_back(f.get<bool>());
    }
    bag.anomaly_flags = std::move(flags);
  }
  bag.validate();
  return bag;
}

void write_dataset(std::ostream& os, std::span<const mir::Bag> bags) {
  for (const auto& bag : bags) os << bag_to_json_line(bag) << '\n';
}

std::vector<mir::Bag> read_dataset(std::istream& is) {
  std::vector<mir::Bag> bags;
  std::string line;
  std::size_t line_no = 0;
  Eigen::Index dim = -1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      mir::Bag bag = bag_from_json_line(line);
      if (dim < 0) dim = bag.dim();
      if (bag.dim() != dim) {
        throw DataError("bag has " + std::to_string(bag.dim()) + " features, expected " +
                        std::to_string(dim));
      }
      bags.push_back(std::move(bag));
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (bags.empty()) throw DataError("dataset contains no bags");
  return bags;
}

std::vector<mir::Bag> read_dataset_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset '" + path.string() + "'");
  try {
    return read_dataset(in);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_file_atomic(const std::filesystem::path& path,
                       const std::function<void(std::ostream&)>& writer) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  try {
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw DataError("cannot write '" + path.string() + "'");
      writer(out);
      out.flush();
      if (!out) throw DataError("write failed for '" + path.string() + "'");
    }
    std::filesystem::rename(tmp, path);
  } catch (...) {
    std::error_code ec;
    std::filesystem::remove(tmp, ec);
    throw;
  }
}

}  // namespace vaemir::io
