#include <iostream>
#include <string>

#include "lsvi/runner.hpp"

namespace {

void usage() {
  std::cerr << "usage: lsvi <command> [args]\n"
            << "  run <config>       execute an experiment, write trace/params/meta\n"
            << "  validate <config>  check a config without running it\n"
            << "  targets            list built-in targets and their keys\n"
            << "env: LSVI_THREADS caps worker threads (results identical across values)\n"
            << "exit codes: 0 ok, 2 config error, 3 runtime error\n";
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    usage();
    return 2;
  }
  const std::string cmd = argv[1];
  if (cmd == "targets") return lsvi::command_targets();
  if (cmd == "run" || cmd == "validate") {
    if (argc != 3) {
      usage();
      return 2;
    }
    return cmd == "run" ? lsvi::command_run(argv[2]) : lsvi::command_validate(argv[2]);
  }
  usage();
  return 2;
}
