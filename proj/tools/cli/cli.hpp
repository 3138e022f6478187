#pragma once

#include <iosfwd>

namespace nosqlab::cli {

// Exit codes: 0 clean, 1 findings or failed reproduction, 2 operational error.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

struct DemoOptions {
  bool disable_safe_cast = false;  // mutation hook
};

int run_demo(const DemoOptions& options, std::ostream& out, std::ostream& err);

}  // namespace nosqlab::cli
