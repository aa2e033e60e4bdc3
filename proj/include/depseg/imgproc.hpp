#pragma once

#include "depseg/imgproc/canny.hpp"
#include "depseg/imgproc/connected_components.hpp"
#include "depseg/imgproc/distance_transform.hpp"
#include "depseg/imgproc/filters.hpp"
#include "depseg/imgproc/kmeans.hpp"
#include "depseg/imgproc/local_maxima.hpp"
#include "depseg/imgproc/morphology.hpp"
#include "depseg/imgproc/otsu.hpp"
#include "depseg/imgproc/watershed.hpp"
