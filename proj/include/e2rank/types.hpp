#pragma once

#include <string>

namespace e2rank {

struct Document {
  std::string id;
  std::string text;

  bool operator==(const Document&) const = default;
};

struct Query {
  std::string id;
  std::string text;

  bool operator==(const Query&) const = default;
};

}  // namespace e2rank
