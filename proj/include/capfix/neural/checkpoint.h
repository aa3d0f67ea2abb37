#ifndef CAPFIX_NEURAL_CHECKPOINT_H_
#define CAPFIX_NEURAL_CHECKPOINT_H_

#include <filesystem>
#include <string>

#include "capfix/corpus.h"
#include "capfix/neural/model.h"
#include "capfix/neural/trainer.h"

namespace capfix::neural {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelParameters params;
  Vocabulary vocab;
  TrainingConfig config;
};

// Binary layout is described in docs/checkpoint_format.md.
std::string serialize_checkpoint(const Checkpoint& checkpoint);
// Throws FormatError on any truncation, checksum or shape problem.
Checkpoint parse_checkpoint(std::string_view bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace capfix::neural

#endif  // CAPFIX_NEURAL_CHECKPOINT_H_
