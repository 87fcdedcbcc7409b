#pragma once

#include "ormachine/datagen.hpp"
#include "ormachine/error.hpp"
#include "ormachine/io.hpp"
#include "ormachine/model.hpp"
#include "ormachine/multilayer.hpp"
#include "ormachine/predict.hpp"
#include "ormachine/rng.hpp"
#include "ormachine/sampler.hpp"
