#pragma once

#include "roq/chain.hpp"
#include "roq/cotable.hpp"
#include "roq/error.hpp"
#include "roq/expr.hpp"
#include "roq/generate.hpp"
#include "roq/instance.hpp"
#include "roq/pipeline.hpp"
#include "roq/provenance.hpp"
#include "roq/query.hpp"
#include "roq/readonce.hpp"
