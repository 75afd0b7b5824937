// Writes the block-structured toy dataset (kg.tsv, interactions.tsv).

#include <iostream>

#include <CLI11.hpp>

#include "hakg/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"generate a block-structured toy dataset", "hakg-synth"};
  hakg::synth::SyntheticConfig cfg;
  std::string out = ".";
  app.add_option("--out", out, "output directory");
  app.add_option("--users", cfg.users);
  app.add_option("--items", cfg.items);
  app.add_option("--blocks", cfg.blocks);
  app.add_option("--seed", cfg.seed);
  CLI11_PARSE(app, argc, argv);
  try {
    hakg::synth::write_dataset(cfg, out);
  } catch (const std::exception& e) {
    std::cerr << "hakg-synth: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
