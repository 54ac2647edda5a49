#pragma once

#include "pitchcov/audio_io.hpp"
#include "pitchcov/config.hpp"
#include "pitchcov/csv.hpp"
#include "pitchcov/dsp.hpp"
#include "pitchcov/error.hpp"
#include "pitchcov/eval.hpp"
#include "pitchcov/fft.hpp"
#include "pitchcov/matrix.hpp"
#include "pitchcov/model.hpp"
#include "pitchcov/parallel.hpp"
#include "pitchcov/pipeline.hpp"
#include "pitchcov/pitch.hpp"
#include "pitchcov/synth.hpp"
