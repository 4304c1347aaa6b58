#pragma once

#include "cosrec/config.hpp"
#include "cosrec/core.hpp"
#include "cosrec/estimator.hpp"
#include "cosrec/harness.hpp"
#include "cosrec/io.hpp"
#include "cosrec/model.hpp"
#include "cosrec/reveal.hpp"
#include "cosrec/rng.hpp"
#include "cosrec/similarity.hpp"
