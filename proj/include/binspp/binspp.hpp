#pragma once

#include "binspp/audio_io.hpp"
#include "binspp/baseline.hpp"
#include "binspp/config.hpp"
#include "binspp/error.hpp"
#include "binspp/evaluation.hpp"
#include "binspp/gru.hpp"
#include "binspp/model.hpp"
#include "binspp/spectral.hpp"
#include "binspp/spp_target.hpp"
#include "binspp/synthetic.hpp"
