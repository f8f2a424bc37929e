#include <exception>
#include <iostream>

#include "CLI11.hpp"
#include "common.hpp"
#include "mtkit/error.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Multilingual tokenizer and training-data pipeline toolkit"};
  app.require_subcommand(1);
  mtkit::cli::register_vocab_commands(app);
  mtkit::cli::register_analysis_commands(app);
  mtkit::cli::register_data_commands(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Covers --help (exit 0) and malformed invocations alike.
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const mtkit::cli::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
