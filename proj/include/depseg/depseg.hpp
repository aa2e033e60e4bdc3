#pragma once

#include "depseg/backends.hpp"
#include "depseg/config.hpp"
#include "depseg/error.hpp"
#include "depseg/evaluator.hpp"
#include "depseg/image.hpp"
#include "depseg/imgproc.hpp"
#include "depseg/mask_pipeline.hpp"
#include "depseg/matcher.hpp"
#include "depseg/pipeline.hpp"
#include "depseg/prompt_proposal.hpp"
#include "depseg/render.hpp"
#include "depseg/synthetic.hpp"
#include "depseg/template_bank.hpp"
#include "depseg/tensor_io.hpp"
