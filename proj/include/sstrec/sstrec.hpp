#pragma once

#include "sstrec/core.hpp"
#include "sstrec/grid_ops.hpp"
#include "sstrec/sgr1.hpp"
#include "sstrec/dataset.hpp"
#include "sstrec/synthdata.hpp"
#include "sstrec/stats.hpp"
#include "sstrec/climatology.hpp"
#include "sstrec/maskgen.hpp"
#include "sstrec/nn/tensor.hpp"
#include "sstrec/nn/layers.hpp"
#include "sstrec/nn/attention.hpp"
#include "sstrec/nn/optim.hpp"
#include "sstrec/nn/checkpoint.hpp"
#include "sstrec/models/model.hpp"
#include "sstrec/models/unet.hpp"
#include "sstrec/models/vit.hpp"
#include "sstrec/trainer.hpp"
