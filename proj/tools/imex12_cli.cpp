#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "imex12/harness.hpp"

int main(int argc, char** argv) {
  using namespace imex12::harness;
  ExperimentConfig cfg;
  try {
    cfg = parse_cli(std::vector<std::string>(argv + 1, argv + argc));
  } catch (const HelpRequested& h) {
    std::cout << h.what();
    return 0;
  } catch (const UsageError& e) {
    std::cerr << "imex12: " << e.what() << "\n(run with --help for usage)\n";
    return 1;
  }

  try {
    const int status = execute(cfg);
    std::cout << experiment_name(cfg.experiment) << ": results written to " << cfg.out << '\n';
    if (status == 2) {
      std::cerr << "imex12: at least one run aborted (see status column)\n";
    }
    return status;
  } catch (const imex12::IntegrationAbort& e) {
    std::cerr << "imex12: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "imex12: " << e.what() << '\n';
    return 1;
  }
}
