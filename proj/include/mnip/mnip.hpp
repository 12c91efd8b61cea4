#pragma once

#include "mnip/canonical.hpp"
#include "mnip/error.hpp"
#include "mnip/evaluator.hpp"
#include "mnip/formula.hpp"
#include "mnip/hom.hpp"
#include "mnip/interp.hpp"
#include "mnip/io.hpp"
#include "mnip/ipencode.hpp"
#include "mnip/ipextract.hpp"
#include "mnip/isomorphism.hpp"
#include "mnip/path.hpp"
#include "mnip/ramsey.hpp"
#include "mnip/relcore.hpp"
#include "mnip/sexpr.hpp"
#include "mnip/sparsity.hpp"
