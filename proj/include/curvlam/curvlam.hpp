#pragma once

#include "curvlam/appell.hpp"
#include "curvlam/bvp.hpp"
#include "curvlam/csv.hpp"
#include "curvlam/error.hpp"
#include "curvlam/geometry.hpp"
#include "curvlam/integrate.hpp"
#include "curvlam/lambert.hpp"
#include "curvlam/systems.hpp"
#include "curvlam/verify.hpp"
