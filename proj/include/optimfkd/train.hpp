#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace optimfkd {

/// Shared trainer settings. The FKD and IKD trainers take the identical
/// structure so that architecture and iteration-count parity between the
/// two models is enforced by construction.
struct TrainConfig {
  std::uint64_t seed = 7;
  long steps = 4000;          // adam updates
  int batch = 64;
  double lr = 1e-3;
  double lr_decay = 0.5;
  long lr_decay_every = 1600; // steps
  int hidden_layers = 6;
  int hidden_width = 256;
  int k_windows = 64;         // windows sampled per trajectory
  std::array<double, 6> loss_weights = {1, 1, 1, 1, 1, 1};
};

struct TrainReport {
  std::vector<double> train_loss;  // per epoch (mean window loss)
  std::vector<double> val_loss;    // per epoch
  long steps = 0;
};

}  // namespace optimfkd
