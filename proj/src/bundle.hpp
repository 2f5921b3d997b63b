#pragma once

#include <cstdint>

#include "data.hpp"
#include "predictor.hpp"
#include "schedule.hpp"

namespace missddim {

/// A trained model together with everything needed to apply it: the noise
/// schedule it was trained against and the schema of the data it expects.
/// This is exactly the content of a model checkpoint.
struct ModelBundle {
    NoisePredictor net;
    NoiseSchedule schedule;
    Schema schema;
    std::uint64_t train_seed = 0;
    int trained_epochs = 0;
};

}  // namespace missddim
