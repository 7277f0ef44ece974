#pragma once

#include "errors.hpp"
#include "graph.hpp"
#include "mesh.hpp"
#include "graph_function.hpp"
#include "operators.hpp"
#include "soliton.hpp"
#include "functionals.hpp"
#include "mp_constants.hpp"
#include "endpoints.hpp"
#include "mountain_pass.hpp"
#include "newton.hpp"
#include "morse.hpp"
#include "certificate.hpp"
#include "continuation.hpp"
#include "blowup.hpp"
#include "neg_directions.hpp"
#include "config.hpp"
#include "workflows.hpp"
