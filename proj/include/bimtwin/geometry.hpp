#pragma once

#include "bimtwin/geometry/obb.hpp"
#include "bimtwin/geometry/swept.hpp"
#include "bimtwin/geometry/transform.hpp"
