#pragma once

// Command-line front end: simulate | estimate | verify | rate-study.
// Exposed as a function so tests can drive it in-process.
// Exit codes: 0 success (including "inapplicable" verdicts), 1 runtime
// failure, 2 input validation failure.

namespace eio {

int run_cli(int argc, const char* const* argv);

}  // namespace eio
