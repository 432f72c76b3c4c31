#pragma once

namespace lowlogit {

enum ExitCode : int { kExitOk = 0, kExitUsage = 2, kExitBudget = 3, kExitNumerical = 4 };

int run_cli(int argc, char** argv);

}  // namespace lowlogit
