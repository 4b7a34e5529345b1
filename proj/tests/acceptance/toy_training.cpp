// Trains the toy texture denoiser and checks that the smoothed loss at
// the end is below half of the smoothed loss at the start. Writes the
// checkpoint for the acceptance run.

#include <chrono>
#include <cstdio>
#include <filesystem>

#include "toy.hpp"

int main(int argc, char** argv) {
  if (argc != 2) {
    std::fprintf(stderr, "usage: toy_training <checkpoint-out>\n");
    return 2;
  }
  const auto start = std::chrono::steady_clock::now();
  const toy::Trained trained = toy::train();
  syncdiff::save_checkpoint(trained.model, argv[1]);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const double ratio = trained.final_loss / trained.initial_loss;
  const bool pass = ratio < 0.5;
  std::printf("%s toy training: smoothed loss %.4f -> %.4f (ratio %.3f, need < 0.5) in %.1f s\n",
              pass ? "PASS" : "FAIL", trained.initial_loss, trained.final_loss, ratio, secs);
  return pass ? 0 : 1;
}
