#pragma once

#include "ivote/audit_logs.hpp"
#include "ivote/bytes.hpp"
#include "ivote/crypto_suite.hpp"
#include "ivote/electoral_core.hpp"
#include "ivote/network.hpp"
#include "ivote/outputs.hpp"
#include "ivote/protocol.hpp"
#include "ivote/scenario.hpp"
#include "ivote/simulator.hpp"
#include "ivote/tally_alloc.hpp"
#include "ivote/types.hpp"
