#pragma once

#include "mfcluster/coupling.hpp"
#include "mfcluster/dynamics.hpp"
#include "mfcluster/equilibrium.hpp"
#include "mfcluster/error.hpp"
#include "mfcluster/io.hpp"
#include "mfcluster/measures.hpp"
#include "mfcluster/stability.hpp"
