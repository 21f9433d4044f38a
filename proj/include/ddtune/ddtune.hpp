#pragma once

#include "ddtune/common.hpp"
#include "ddtune/instances.hpp"
#include "ddtune/io.hpp"
#include "ddtune/linkage.hpp"
#include "ddtune/ssl.hpp"
#include "ddtune/logreg.hpp"
#include "ddtune/bounds.hpp"
#include "ddtune/tune.hpp"
#include "ddtune/online.hpp"
#include "ddtune/report.hpp"
