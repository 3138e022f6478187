#pragma once

#include <string>

#include "nosqlab/form_decoder.hpp"

namespace testsupport {

// Renders a decoded form the way PHP's json_encode(..., JSON_UNESCAPED_SLASHES |
// JSON_UNESCAPED_UNICODE) renders $_POST: arrays keyed 0..n-1 become lists,
// the empty array is [].
std::string php_json(const nosqlab::form::FormTree& tree);

}  // namespace testsupport
