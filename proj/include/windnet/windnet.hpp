#pragma once

#include "autoencoder.hpp"
#include "checkpoint.hpp"
#include "layers.hpp"
#include "loss.hpp"
#include "optimizer.hpp"
#include "probe.hpp"
#include "random.hpp"
#include "sequential.hpp"
#include "tensor.hpp"
#include "topo.hpp"
#include "windgen.hpp"
