#pragma once

// Everything: image types and I/O, preprocessing, HOG, classifier,
// detector, simulator, evaluator and the command implementations.
#include "gprscan/commands.hpp"
