#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "zrlab/nn.hpp"

namespace zrlab {

// Named-tensor store. On disk: magic "ZVCK", u32 LE header length, header
// JSON (tensor directory with byte offsets, training step, config snapshot,
// RNG state), then the packed f32 little-endian payload. Load-then-save is
// byte-identical.
struct CheckpointTensor {
    std::string name;
    std::vector<int> shape;
    std::vector<float> data;
};

struct Checkpoint {
    std::int64_t step = 0;
    nlohmann::json config;  // RunConfig snapshot
    std::string rng_state;
    std::vector<CheckpointTensor> tensors;

    const CheckpointTensor* find(const std::string& name) const;
};

void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);

// Parameter bridging. restore throws DataError naming the first tensor whose
// shape disagrees with the current model.
template <typename S>
void collect_params(const nn::ParamList<S>& params, Checkpoint& ck);
template <typename S>
void restore_params(const Checkpoint& ck, const nn::ParamList<S>& params);

}  // namespace zrlab
