#pragma once

#include "discl/random_fields.hpp"

namespace discl::testing {

using discl::random_matrix;
using discl::random_tensor_field;
using discl::random_vector_field;
using discl::smooth_tensor_field;
using discl::smooth_vector_field;
using discl::SmoothModes;

}  // namespace discl::testing
