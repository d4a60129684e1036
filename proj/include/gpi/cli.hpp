#pragma once

#include <iosfwd>

namespace gpi::cli {

// Command-line front end. Machine-readable output (JSON or CSV) goes to
// `out`, usage and diagnostic text to `err`. Exit code contract:
//   0  success, or every checked case passed
//   1  an inequality violation or a confirmed hunt candidate was found
//   2  usage error (bad flags, malformed files, invalid case shape)
//   3  numeric or capability error
int run(int argc, const char* const* argv, std::ostream& out,
        std::ostream& err);

}  // namespace gpi::cli
