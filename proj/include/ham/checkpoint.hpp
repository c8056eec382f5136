#pragma once

#include <string>

#include "ham/denoiser.hpp"

namespace ham {

// Checkpoint directory: one HAMT file per named parameter plus a plain-text
// manifest ("manifest.txt") with config keys and one line per tensor:
//   param <name> <file> <dim0xdim1x...>
void save_checkpoint(const std::string& dir, const Denoiser& model);
Denoiser load_checkpoint(const std::string& dir);

} // namespace ham
