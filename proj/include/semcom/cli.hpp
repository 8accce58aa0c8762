#ifndef SEMCOM_CLI_HPP
#define SEMCOM_CLI_HPP

namespace semcom {

// Entry point of the command-line tool, split out so tests can drive it
// in-process. Returns the process exit code: 0 success, 1 usage error,
// 2 bad configuration, 3 data/file problems, 4 numeric failure.
int cli_main(int argc, char** argv);

}  // namespace semcom

#endif  // SEMCOM_CLI_HPP
