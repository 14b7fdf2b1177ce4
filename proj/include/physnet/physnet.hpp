#pragma once

#include "physnet/engine.hpp"
#include "physnet/format.hpp"
#include "physnet/io.hpp"
#include "physnet/linear_system.hpp"
#include "physnet/network.hpp"
#include "physnet/oracle.hpp"
#include "physnet/polynomial.hpp"
