#ifndef QREFORM_CLI_H_
#define QREFORM_CLI_H_

#include <iosfwd>
#include <string>
#include <vector>

namespace qreform {

inline constexpr const char* kToolVersion = "0.1.0";

// Exit codes of run_cli.
enum ExitCode : int { kOk = 0, kUsage = 1, kDataFailure = 2, kNumericFailure = 3 };

// argv[0] is the program name, argv[1] the subcommand.
int run_cli(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);

}  // namespace qreform

#endif  // QREFORM_CLI_H_
