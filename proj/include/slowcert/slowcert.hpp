#pragma once

#include "slowcert/core.hpp"
#include "slowcert/quadrature.hpp"
#include "slowcert/averaging.hpp"
#include "slowcert/report.hpp"
#include "slowcert/sampling.hpp"
#include "slowcert/certificate.hpp"
#include "slowcert/transform.hpp"
#include "slowcert/ode.hpp"
#include "slowcert/simverify.hpp"
#include "slowcert/examples.hpp"
#include "slowcert/expression.hpp"
#include "slowcert/config.hpp"
#include "slowcert/run.hpp"
