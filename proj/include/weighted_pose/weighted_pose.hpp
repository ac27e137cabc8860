#pragma once

#include "weighted_pose/errors.hpp"
#include "weighted_pose/geometry.hpp"
#include "weighted_pose/losses.hpp"
#include "weighted_pose/oracle.hpp"
#include "weighted_pose/problem.hpp"
#include "weighted_pose/solver.hpp"
#include "weighted_pose/synthetic.hpp"
