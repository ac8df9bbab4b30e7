#pragma once

#include "errors.hpp"
#include "parallel.hpp"
#include "operator.hpp"
#include "superop.hpp"
#include "induced_norm.hpp"
#include "mode_analytics.hpp"
#include "backend.hpp"
#include "regimes.hpp"
#include "heisenberg.hpp"
#include "spectral_meta.hpp"
#include "classical.hpp"
#include "models.hpp"
#include "io.hpp"
