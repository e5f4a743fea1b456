#pragma once

#include "tamed/error.hpp"
#include "tamed/random.hpp"
#include "tamed/parallel.hpp"
#include "tamed/grid.hpp"
#include "tamed/quadrature.hpp"
#include "tamed/controls.hpp"
#include "tamed/fft.hpp"
#include "tamed/fields.hpp"
#include "tamed/taming.hpp"
#include "tamed/brownian.hpp"
#include "tamed/scheme.hpp"
#include "tamed/rates.hpp"
#include "tamed/zvonkin.hpp"
#include "tamed/varpi.hpp"
#include "tamed/khasminskii.hpp"
#include "tamed/transport.hpp"
