#pragma once

#include <string>
#include <vector>

namespace zrlab {

// Discrete acoustic-unit stream: encoder output, vocoder input. Units run at
// half the mel frame rate, i.e. frame_rate = sample_rate / (2*hop).
struct UnitSequence {
    std::string id;
    std::string speaker;
    std::vector<int> indices;
    double frame_rate = 0.0;
};

}  // namespace zrlab
