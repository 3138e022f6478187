#pragma once

#include <optional>
#include <vector>

#include "nosqlab/value.hpp"

namespace testsupport {

// A deliberately plain second implementation of the query language, written
// from the semantics table rather than from the production evaluator.
// Returns nullopt where the query is invalid.
std::optional<std::vector<std::size_t>> reference_find(const std::vector<nosqlab::Value>& docs,
                                                       const nosqlab::Value& query);

}  // namespace testsupport
