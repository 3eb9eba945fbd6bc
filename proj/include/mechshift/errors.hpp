// Copyright 2026 The mechshift authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MECHSHIFT_ERRORS_HPP
#define MECHSHIFT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace mechshift {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

#define MECHSHIFT_DEFINE_ERROR(NAME)       \
    struct NAME : Error {                  \
        using Error::Error;                \
    }

// graph construction
MECHSHIFT_DEFINE_ERROR(CycleDetected);
MECHSHIFT_DEFINE_ERROR(UnknownVariable);
MECHSHIFT_DEFINE_ERROR(DuplicateName);
MECHSHIFT_DEFINE_ERROR(IndexOutOfRange);
MECHSHIFT_DEFINE_ERROR(InvalidSpec);

// scm engine
MECHSHIFT_DEFINE_ERROR(UnknownMechanism);
MECHSHIFT_DEFINE_ERROR(StateSpaceTooLarge);
MECHSHIFT_DEFINE_ERROR(NonDiscreteVariable);
MECHSHIFT_DEFINE_ERROR(ZeroTrainDensity);

// scenarios
MECHSHIFT_DEFINE_ERROR(UnknownCenter);
MECHSHIFT_DEFINE_ERROR(UnknownAnnotator);

// models & metrics
MECHSHIFT_DEFINE_ERROR(DegenerateTarget);
MECHSHIFT_DEFINE_ERROR(NonFiniteLoss);
MECHSHIFT_DEFINE_ERROR(MissingVariable);
MECHSHIFT_DEFINE_ERROR(AllZeroWeights);
MECHSHIFT_DEFINE_ERROR(NegativeWeight);

// density ratio
MECHSHIFT_DEFINE_ERROR(InsufficientSamples);

// attribution
MECHSHIFT_DEFINE_ERROR(TooManyMechanisms);

// runner
MECHSHIFT_DEFINE_ERROR(ConfigInvalid);
MECHSHIFT_DEFINE_ERROR(OracleUnavailable);
MECHSHIFT_DEFINE_ERROR(PipelineError);

#undef MECHSHIFT_DEFINE_ERROR

}  // namespace mechshift

#endif
