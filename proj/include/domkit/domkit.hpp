#pragma once

#include "domkit/error.hpp"
#include "domkit/log.hpp"
#include "domkit/numerics.hpp"
#include "domkit/lti.hpp"
#include "domkit/frequency.hpp"
#include "domkit/dominance.hpp"
#include "domkit/simulate.hpp"
