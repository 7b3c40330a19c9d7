// Copyright 2026 The reclab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "reclab/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "csv.hpp"
#include "internal.hpp"

namespace reclab::datasets {

std::string_view to_string(DatasetFormat format) {
  switch (format) {
    case DatasetFormat::kMovieLens100K:
      return "movielens_100k";
    case DatasetFormat::kMovieLens1M:
      return "movielens_1m";
    case DatasetFormat::kHetRecLastFm:
      return "hetrec_lastfm";
    case DatasetFormat::kGenericCsv:
      return "generic_csv";
  }
  return "unknown";
}

DatasetFormat parse_format(std::string_view name) {
  for (auto format : {DatasetFormat::kMovieLens100K, DatasetFormat::kMovieLens1M,
                      DatasetFormat::kHetRecLastFm, DatasetFormat::kGenericCsv}) {
    if (to_string(format) == name) return format;
  }
  throw ValidationError("unknown dataset format '" + std::string(name) + "'");
}

DatasetDescriptor make_descriptor(std::string id, DatasetFormat format,
                                  std::filesystem::path path) {
  DatasetDescriptor descriptor;
  descriptor.id = std::move(id);
  descriptor.format = format;
  descriptor.path = std::move(path);
  descriptor.has_timestamps = format == DatasetFormat::kMovieLens100K ||
                              format == DatasetFormat::kMovieLens1M;
  return descriptor;
}

namespace {

std::optional<Rating> make_rating(std::string_view user, std::string_view item,
                                  std::string_view value,
                                  std::optional<std::string_view> timestamp) {
  const auto parsed_value = csv::parse_double(value);
  if (!parsed_value) return std::nullopt;
  std::optional<std::int64_t> ts;
  if (timestamp && !csv::trim(*timestamp).empty()) {
    ts = csv::parse_int(*timestamp);
    if (!ts) return std::nullopt;
  }
  try {
    return Rating::make(std::string(user), std::string(item), *parsed_value, ts);
  } catch (const ValidationError&) {
    return std::nullopt;
  }
}

std::optional<Rating> parse_separated(std::string_view line,
                                      std::string_view separator,
                                      bool with_timestamp) {
  const auto parts = csv::split_literal(line, separator);
  const std::size_t expected = with_timestamp ? 4 : 3;
  if (parts.size() != expected) return std::nullopt;
  return make_rating(csv::trim(parts[0]), csv::trim(parts[1]), parts[2],
                     with_timestamp ? std::optional(parts[3]) : std::nullopt);
}

// Three or four columns; an empty fourth column means "no timestamp".
std::optional<Rating> parse_generic(std::string_view record, char delimiter) {
  const auto fields = csv::split_quoted(record, delimiter);
  if (fields.size() == 4) {
    return make_rating(fields[0], fields[1], fields[2], fields[3]);
  }
  if (fields.size() != 3) return std::nullopt;
  return make_rating(fields[0], fields[1], fields[2], std::nullopt);
}

bool looks_like_header(std::string_view record, char delimiter) {
  const auto fields = csv::split_quoted(record, delimiter);
  return fields.size() < 3 || !csv::parse_double(fields[2]).has_value();
}

}  // namespace

LoadedDataset parse_dataset(std::istream& in,
                            const DatasetDescriptor& descriptor) {
  std::vector<Rating> ratings;
  std::size_t malformed = 0;
  std::size_t lines = 0;
  std::string record;
  bool first = true;

  while (csv::read_record(in, record)) {
    if (first) {
      first = false;
      bool skip = false;
      if (descriptor.format == DatasetFormat::kHetRecLastFm) {
        skip = true;
      } else if (descriptor.format == DatasetFormat::kGenericCsv) {
        skip = descriptor.csv.header == HeaderMode::kPresent ||
               (descriptor.csv.header == HeaderMode::kAuto &&
                looks_like_header(record, descriptor.csv.delimiter));
      }
      if (skip) continue;
    }
    if (csv::trim(record).empty()) continue;
    ++lines;

    std::optional<Rating> rating;
    switch (descriptor.format) {
      case DatasetFormat::kMovieLens100K:
        rating = parse_separated(record, "\t", true);
        break;
      case DatasetFormat::kMovieLens1M:
        rating = parse_separated(record, "::", true);
        break;
      case DatasetFormat::kHetRecLastFm:
        rating = parse_separated(record, "\t", false);
        break;
      case DatasetFormat::kGenericCsv:
        rating = parse_generic(record, descriptor.csv.delimiter);
        break;
    }
    if (rating) {
      ratings.push_back(std::move(*rating));
    } else {
      ++malformed;
    }
  }

  if (lines > 0 &&
      static_cast<double>(malformed) > kMaxMalformedFraction * lines) {
    throw DatasetError(std::to_string(malformed) + " of " +
                       std::to_string(lines) + " lines in dataset '" +
                       descriptor.id + "' are malformed; is the format " +
                       std::string(to_string(descriptor.format)) + " correct?");
  }

  LoadedDataset out;
  out.malformed_lines = malformed;
  out.ratings = RatingSet::from_ratings(std::move(ratings), &out.duplicate_ratings);
  return out;
}

LoadedDataset load_dataset(const DatasetDescriptor& descriptor) {
  std::ifstream in(descriptor.path, std::ios::binary);
  if (!in) {
    throw DatasetError("cannot open dataset '" + descriptor.id + "' at " +
                       descriptor.path.string());
  }
  return parse_dataset(in, descriptor);
}

Split split_random(const RatingSet& ratings, double test_fraction,
                   std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ValidationError("test_fraction must lie strictly between 0 and 1");
  }
  std::mt19937_64 rng(seed);
  std::vector<Rating> train;
  std::vector<Rating> test;
  for (const auto& rating : ratings) {
    if (internal::unit_interval(rng) < test_fraction) {
      test.push_back(rating);
    } else {
      train.push_back(rating);
    }
  }
  return Split{RatingSetAccess::make(std::move(train)),
               RatingSetAccess::make(std::move(test))};
}

std::size_t timestamp_train_size(std::size_t n, double test_fraction) {
  const double exact = (1.0 - test_fraction) * static_cast<double>(n);
  // Absorb representation error so that e.g. 0.8 * 10 is not ceiled to 9.
  const double size = std::ceil(exact - 1e-9 * std::max(1.0, exact));
  return std::min(n, static_cast<std::size_t>(std::max(0.0, size)));
}

Split split_timestamp(const RatingSet& ratings, double test_fraction) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ValidationError("test_fraction must lie strictly between 0 and 1");
  }
  for (const auto& rating : ratings) {
    if (!rating.timestamp) {
      throw DatasetError("timestamp split requires timestamps, but the rating (" +
                         rating.user + ", " + rating.item + ") has none");
    }
  }
  std::vector<std::size_t> order(ratings.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return *ratings[a].timestamp < *ratings[b].timestamp;
  });

  const std::size_t cut = timestamp_train_size(ratings.size(), test_fraction);
  std::vector<Rating> train;
  std::vector<Rating> test;
  train.reserve(cut);
  test.reserve(ratings.size() - cut);
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < cut ? train : test).push_back(ratings[order[i]]);
  }
  return Split{RatingSetAccess::make(std::move(train)),
               RatingSetAccess::make(std::move(test))};
}

std::set<ItemId> positive_items(const RatingSet& ratings, const UserId& user,
                                double threshold) {
  std::set<ItemId> items;
  for (const auto& rating : ratings) {
    if (rating.user == user && rating.value > threshold) items.insert(rating.item);
  }
  return items;
}

DatasetRegistry DatasetRegistry::load(const std::filesystem::path& file) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(file.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ValidationError("cannot read dataset registry: " +
                          std::string(e.what()));
  }
  const auto base = file.parent_path();
  DatasetRegistry registry;
  for (const auto& [id, section] : tree) {
    if (section.empty()) {
      throw ValidationError("dataset registry entry '" + id +
                            "' must be a section");
    }
    const auto format_name = section.get_optional<std::string>("format");
    const auto path = section.get_optional<std::string>("path");
    if (!format_name || !path) {
      throw ValidationError("dataset '" + id + "' needs both format and path");
    }
    std::filesystem::path resolved(*path);
    if (resolved.is_relative()) resolved = base / resolved;
    auto descriptor = make_descriptor(id, parse_format(*format_name), resolved);

    if (descriptor.format == DatasetFormat::kGenericCsv) {
      const auto delimiter = section.get<std::string>("delimiter", ",");
      if (delimiter == "\\t" || delimiter == "tab") {
        descriptor.csv.delimiter = '\t';
      } else if (delimiter.size() == 1) {
        descriptor.csv.delimiter = delimiter[0];
      } else {
        throw ValidationError("dataset '" + id +
                              "': delimiter must be a single character");
      }
      const auto header = section.get<std::string>("header", "auto");
      if (header == "true") {
        descriptor.csv.header = HeaderMode::kPresent;
      } else if (header == "false") {
        descriptor.csv.header = HeaderMode::kNone;
      } else if (header == "auto") {
        descriptor.csv.header = HeaderMode::kAuto;
      } else {
        throw ValidationError("dataset '" + id +
                              "': header must be true, false or auto");
      }
      descriptor.has_timestamps = section.get<bool>("timestamps", false);
    }
    registry.add(std::move(descriptor));
  }
  return registry;
}

void DatasetRegistry::add(DatasetDescriptor descriptor) {
  auto id = descriptor.id;
  entries_.insert_or_assign(std::move(id), std::move(descriptor));
}

const DatasetDescriptor& DatasetRegistry::at(const std::string& id) const {
  const auto it = entries_.find(id);
  if (it == entries_.end()) throw NotFoundError("unknown dataset '" + id + "'");
  return it->second;
}

}  // namespace reclab::datasets
