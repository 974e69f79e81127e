#pragma once

#include "bcgram/clustering.hpp"
#include "bcgram/dimred.hpp"
#include "bcgram/dropout.hpp"
#include "bcgram/experiments.hpp"
#include "bcgram/gram.hpp"
#include "bcgram/matrix_io.hpp"
#include "bcgram/missingness.hpp"
#include "bcgram/rng.hpp"
#include "bcgram/simulate.hpp"
