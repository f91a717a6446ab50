#ifndef GMAP_CLI_HPP
#define GMAP_CLI_HPP

namespace gmap {

// Full command-line surface (build, query, eval, compare, slice, stats).
// Exit codes: 0 success, 1 usage, 2 input/parse, 3 internal invariant.
int run_cli(int argc, const char* const* argv);

}  // namespace gmap

#endif
