#ifndef STRATACR_STRATACR_HPP
#define STRATACR_STRATACR_HPP

#include "stratacr/data.hpp"
#include "stratacr/diagnostics.hpp"
#include "stratacr/io.hpp"
#include "stratacr/latent.hpp"
#include "stratacr/model.hpp"
#include "stratacr/oracle.hpp"
#include "stratacr/rng.hpp"
#include "stratacr/sampler.hpp"
#include "stratacr/simulate.hpp"
#include "stratacr/stats.hpp"

#endif
