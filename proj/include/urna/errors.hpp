#pragma once

#include <stdexcept>
#include <string>

namespace urna {

// Base class for every domain error raised by the library. Callers that do
// not care which rule was violated can catch this one type; the CLI maps it
// to a nonzero "rejected" exit code distinct from usage errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// mathcore
struct NotCoprime : Error { using Error::Error; };

// paillier
struct MessageTooLarge : Error { using Error::Error; };
struct InvalidCiphertext : Error { using Error::Error; };

// zkp
struct MessageTooLong : Error { using Error::Error; };

// shamir
struct InvalidThreshold : Error { using Error::Error; };
struct InsufficientShards : Error { using Error::Error; };
struct DuplicateAbscissa : Error { using Error::Error; };

// encoding
struct InvalidSpec : Error { using Error::Error; };
struct SingletonSubset : Error { using Error::Error; };
struct InvalidSelection : Error { using Error::Error; };
struct CountMismatch : Error { using Error::Error; };
struct OverflowSuspected : Error { using Error::Error; };
struct NameTooLong : Error { using Error::Error; };

// election / tally
struct UnknownVoter : Error { using Error::Error; };
struct AlreadyVoted : Error { using Error::Error; };
struct SessionAlreadyActive : Error { using Error::Error; };
struct SessionInvalid : Error { using Error::Error; };
struct SignatureInvalid : Error { using Error::Error; };
struct ProofInvalid : Error { using Error::Error; };
struct WrongBallotStyle : Error { using Error::Error; };
struct UnknownAnonId : Error { using Error::Error; };

// admin
struct ElectionMismatch : Error { using Error::Error; };
struct LifecycleError : Error { using Error::Error; };

}  // namespace urna
