#pragma once

#include "spnkit/attitude_codec.hpp"
#include "spnkit/camera.hpp"
#include "spnkit/error.hpp"
#include "spnkit/evaluation.hpp"
#include "spnkit/parallel.hpp"
#include "spnkit/position_solver.hpp"
#include "spnkit/quaternion.hpp"
#include "spnkit/quaternion_average.hpp"
#include "spnkit/rng.hpp"
#include "spnkit/rotation_sampling.hpp"
#include "spnkit/scene_generator.hpp"
#include "spnkit/text_io.hpp"
#include "spnkit/toy_predictor.hpp"
#include "spnkit/vec.hpp"
#include "spnkit/wireframe.hpp"
