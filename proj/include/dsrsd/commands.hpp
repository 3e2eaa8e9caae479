#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "dsrsd/config.hpp"

namespace dsrsd {

/// Dataset named by the run config: the manifest when set, else synthetic data
/// generated from `synthetic` and `seed`.
MultimodalDataset load_run_dataset(const RunConfig& config);

/// Each command reads a fully resolved run document, writes its artifacts under
/// `output_dir`, prints a short summary to `out` and returns the exit code.
/// Failures surface as dsrsd::Error.
int cmd_gen_data(const Json& doc, std::ostream& out);
int cmd_train(const Json& doc, std::ostream& out);
int cmd_eval(const Json& doc, std::ostream& out);
int cmd_sweep(const Json& doc, std::ostream& out);
int cmd_ablate(const Json& doc, std::ostream& out);
int cmd_export(const Json& doc, std::ostream& out);
int cmd_gradcheck(const Json& doc, std::ostream& out);

/// Full command-line entry point (argv without the program name). Maps errors
/// to exit codes: 1 config/usage, 2 data/I/O, 3 numerical failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dsrsd
