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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <set>
#include <string>
#include <string_view>

#include "reclab/domain.hpp"

namespace reclab::datasets {

class DatasetError : public Error {
 public:
  using Error::Error;
};

enum class DatasetFormat { kMovieLens100K, kMovieLens1M, kHetRecLastFm, kGenericCsv };

std::string_view to_string(DatasetFormat format);
// Accepts the names returned by to_string(); throws ValidationError otherwise.
DatasetFormat parse_format(std::string_view name);

enum class HeaderMode { kNone, kPresent, kAuto };

// Layout of a generic_csv file: columns are user, item, value and an optional
// fourth timestamp column (empty means absent).
struct CsvLayout {
  char delimiter = ',';
  HeaderMode header = HeaderMode::kAuto;
};

struct DatasetDescriptor {
  std::string id;
  DatasetFormat format = DatasetFormat::kGenericCsv;
  std::filesystem::path path;
  bool has_timestamps = false;
  CsvLayout csv;  // generic_csv only
};

// Descriptor with has_timestamps derived from the format.
DatasetDescriptor make_descriptor(std::string id, DatasetFormat format,
                                  std::filesystem::path path);

struct LoadedDataset {
  RatingSet ratings;
  std::size_t malformed_lines = 0;
  std::size_t duplicate_ratings = 0;
};

// Largest tolerated share of malformed lines before a file is rejected as a
// format mismatch.
inline constexpr double kMaxMalformedFraction = 0.01;

// Throws DatasetError when the file is missing or too many lines fail to
// parse.
LoadedDataset load_dataset(const DatasetDescriptor& descriptor);
LoadedDataset parse_dataset(std::istream& in, const DatasetDescriptor& descriptor);

struct Split {
  RatingSet train;
  RatingSet test;
};

// Sends every rating to the test set independently with probability
// test_fraction.
Split split_random(const RatingSet& ratings, double test_fraction,
                   std::uint64_t seed);

// Orders ratings by timestamp (stable on file order) and cuts after the first
// ceil((1 - test_fraction) * n). Throws DatasetError if a timestamp is missing.
Split split_timestamp(const RatingSet& ratings, double test_fraction);

// Number of training ratings split_timestamp keeps for n ratings.
std::size_t timestamp_train_size(std::size_t n, double test_fraction);

// Items the user rated strictly above threshold.
std::set<ItemId> positive_items(const RatingSet& ratings, const UserId& user,
                                double threshold);

// dataset_id -> descriptor, read from an INI file with one section per
// dataset:
//
//   [ml100k]
//   format = movielens_100k
//   path = ml-100k/u.data
//
// generic_csv sections may also set `delimiter`, `header` (true, false or
// auto) and `timestamps` (true or false). Relative paths resolve against the
// registry file's directory.
class DatasetRegistry {
 public:
  DatasetRegistry() = default;

  // Throws ValidationError on unreadable or malformed files.
  static DatasetRegistry load(const std::filesystem::path& file);

  void add(DatasetDescriptor descriptor);
  // Throws NotFoundError.
  const DatasetDescriptor& at(const std::string& id) const;
  bool contains(const std::string& id) const { return entries_.contains(id); }
  const std::map<std::string, DatasetDescriptor>& entries() const {
    return entries_;
  }

 private:
  std::map<std::string, DatasetDescriptor> entries_;
};

}  // namespace reclab::datasets
