#ifndef DOTSTITCH_DOTSTITCH_HPP
#define DOTSTITCH_DOTSTITCH_HPP

#include "dotstitch/common.hpp"
#include "dotstitch/seqcore.hpp"
#include "dotstitch/fetch.hpp"
#include "dotstitch/thermo.hpp"
#include "dotstitch/dotplot.hpp"
#include "dotstitch/datasetgen.hpp"
#include "dotstitch/evalkit.hpp"
#include "dotstitch/config.hpp"
#include "dotstitch/commands.hpp"

#endif  // DOTSTITCH_DOTSTITCH_HPP
